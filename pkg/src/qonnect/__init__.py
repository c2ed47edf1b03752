"""QONNECT: QoS-aware orchestration across simulated cloud, fog, and edge clusters."""

__version__ = "0.1.0"
