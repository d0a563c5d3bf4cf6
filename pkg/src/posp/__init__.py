"""Verification-game laboratory: closed-form equilibrium analysis plus a
deterministic discrete-event simulator for the sampling-based challenge
protocol (orchestrator quorum, asserter/validator sampling, arbitration,
settlement)."""

__version__ = "0.1.0"
