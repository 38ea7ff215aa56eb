"""
Energy efficiency of subarrays and fully-connected networks
===========================================================

A subarray network needs one phase shifter per antenna; a fully-connected
network needs one per antenna and RF chain. With RF chains at 250 mW and
shifters at 1 mW the difference is modest but always in the subarray's
favour for equal rate.
"""
from mmhybrid.experiments import EnergyModel, energy_efficiency

for Nt, Nrf in [(32, 4), (64, 4), (64, 8), (256, 8)]:
    sub = EnergyModel.subarray(Nt, Nrf)
    full = EnergyModel.fully_connected(Nt, Nrf)
    print(f"Nt={Nt:3d} Nrf={Nrf}: subarray {sub.total_power:.3f} W, "
          f"fully connected {full.total_power:.3f} W, ratio {full.total_power / sub.total_power:.3f}")

# Bits per joule at 4 bps/Hz.
print(energy_efficiency(4.0, EnergyModel.subarray(64, 4)),
      energy_efficiency(4.0, EnergyModel.fully_connected(64, 4)))
