"""Recoverable verifiable secret sharing and a private BFT key-value store."""
