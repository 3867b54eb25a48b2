"""perchsim: deterministic simulator and control library for ornithopter branch perching."""

__version__ = "0.1.0"
