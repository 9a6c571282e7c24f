"""IRS-assisted full-duplex sensing-communication-computing resource allocation."""

__version__ = "0.1.0"
