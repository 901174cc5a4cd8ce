"""Email communication indicators and top-performer modeling from email archives."""

__version__ = "0.1.0"
