"""Certify that a channel preserves entanglement (acts as a quantum memory).

A quantum memory is a channel that is not entanglement breaking. The semidefinite
quantifier is positive for the identity and zero for measure-and-prepare channels.
"""

from mdiq.memory import quantify_memory, run_memory_protocol
from mdiq.quantum import channel_preset
from mdiq.sdp import robustness_ppt

for name in ["identity", "depolarizing(0.3)", "depolarizing(0.7)", "z-measure-prepare", "constant"]:
    choi = channel_preset(name)
    bound, sol = quantify_memory(run_memory_protocol(choi))
    rob, _ = robustness_ppt(choi)
    print(f"{name:>20}: memory bound {bound:.5f}   PPT robustness {rob:.5f}   converged {sol.converged}")
