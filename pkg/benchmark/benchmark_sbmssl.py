from benchmark import benchmarker


def main():
    # Only run specific benchmark function(s)
    benchmarker.run_benchmarks(
        modules_to_run=["benchmarks_sbmssl"],
        functions_to_run=[
            "algorithm1",
            "algorithm1_perfect",
            # "spectral_clustering",
            # "label_spreading",
        ],
    )


if __name__ == "__main__":
    main()
