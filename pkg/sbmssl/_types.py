import enum


class _NamedEnum(enum.Enum):
    @classmethod
    def _missing_(cls, value):
        """
        Expand options in the constructor.

        Args:
            value (Union[str, enum]):
                * string: lookup using the value or the case insensitive name, where
                  "-" and "_" are interchangeable
                * enum: create the same enum as the one passed in

        Returns:
            the corresponding enum member.
        """
        if isinstance(value, str):
            key = value.strip().lower().replace("_", "-")
            for member in cls:
                if member.value == key or member.name.lower().replace("_", "-") == key:
                    return member
        # Default behaviour (= lookup based on value)
        return super()._missing_(value)

    def __str__(self) -> str:
        return self.value


class AlphaPolicy(_NamedEnum):
    """
    How the diagonal shift alpha of the regularized system is chosen.
    """

    SPECTRAL_NORM = "spectral-norm"
    """alpha is the spectral norm of the regularized adjacency matrix."""
    MEAN_FIELD = "mean-field"
    """alpha is n (p_in - p_out) / 2, its mean-field value."""
    EXPLICIT = "explicit"
    """alpha is given by the caller."""


class Algorithm(_NamedEnum):
    """
    The classification algorithms the experiment harness can run.
    """

    ALGORITHM1 = "algorithm1"
    ALGORITHM1_PERFECT = "algorithm1-perfect"
    SPECTRAL = "spectral"
    LABEL_SPREADING = "label-spreading"
    BRUTE_MAP = "brute-map"

    @property
    def is_unsupervised(self) -> bool:
        """True if the algorithm ignores the oracle labels."""
        return self is Algorithm.SPECTRAL


class BaselineMethod(_NamedEnum):
    """
    The reference algorithms.
    """

    SPECTRAL = "spectral"
    LABEL_SPREADING = "label-spreading"


class Scope(_NamedEnum):
    """
    The nodes on which accuracy is evaluated.
    """

    UNLABELED = "unlabeled-only"
    ALL = "all-nodes"
