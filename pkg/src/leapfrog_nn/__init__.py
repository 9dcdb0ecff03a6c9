"""Dense sigmoid networks with leapfrogging multi-threaded backpropagation."""

from .backprop import GradientSet, backprop_sequential, quadratic_cost
from .costmodel import PhaseCosts, relative_speedup, threaded_cost, threads_for_speedup, total_cost
from .leapfrog import LeapfrogSchedule, backprop_leapfrog, build_schedule
from .network import ForwardTrace, Network, forward, load, new_random, save

__all__ = [
    "ForwardTrace",
    "GradientSet",
    "LeapfrogSchedule",
    "Network",
    "PhaseCosts",
    "backprop_leapfrog",
    "backprop_sequential",
    "build_schedule",
    "forward",
    "load",
    "new_random",
    "quadratic_cost",
    "relative_speedup",
    "save",
    "threaded_cost",
    "threads_for_speedup",
    "total_cost",
]
