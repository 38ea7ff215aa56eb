"""Energy efficiency of a precoding architecture."""
from dataclasses import dataclass

P_TX = 1.0      # W
P_RF = 0.25     # W per RF chain
P_PS = 0.001    # W per phase shifter


@dataclass(frozen=True)
class EnergyModel:
    """Power draw of the transmitter.

    ``N_ps`` counts phase shifters: one per antenna for (dynamic or fixed)
    subarrays, ``Nt * Nrf`` for a fully-connected network.
    """

    N_rf: int
    N_ps: int
    P_tx: float = P_TX
    P_rf: float = P_RF
    P_ps: float = P_PS

    def __post_init__(self):
        if min(self.N_rf, self.N_ps) < 1 or min(self.P_tx, self.P_rf, self.P_ps) <= 0:
            raise ValueError("energy model entries must be positive")

    @property
    def total_power(self):
        return self.P_tx + self.N_rf * self.P_rf + self.N_ps * self.P_ps

    @classmethod
    def subarray(cls, Nt, Nrf, **kw):
        return cls(Nrf, Nt, **kw)

    @classmethod
    def fully_connected(cls, Nt, Nrf, **kw):
        return cls(Nrf, Nt * Nrf, **kw)


def energy_efficiency(mi, model):
    """Mutual information per watt, ``mi / (P_tx + N_rf P_rf + N_ps P_ps)``."""
    if mi < 0:
        raise ValueError("mutual information cannot be negative")
    return mi / model.total_power
