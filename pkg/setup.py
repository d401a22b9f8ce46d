"""
Setup file to package sbmssl.
"""

import setuptools

with open("sbmssl/version.txt") as file:
    version = file.readline()

setuptools.setup(
    name="sbmssl",
    version=version,
)
