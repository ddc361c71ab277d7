"""fedsaddle - Federated Min-Max Optimization Toolkit"""

__version__ = "0.1.0"
