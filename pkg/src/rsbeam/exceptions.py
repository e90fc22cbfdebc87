"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid system configuration; the message names the offending field."""


class InfeasibleBeamformerError(ValueError):
    """Beamforming matrix violates the transmit power budget."""

    def __init__(self, power, budget):
        self.power = float(power)
        self.budget = float(budget)
        super().__init__(
            "transmit power %.9g exceeds budget %.9g" % (self.power, self.budget)
        )


class NumericalError(RuntimeError):
    """A linear-algebra step failed (non-finite data or a failed factorization)."""


class ChannelFileError(ValueError):
    """Malformed channel file; the message names the field or line at fault."""
