"""BlindSignedID contact-tracing CLI"""

__version__ = "1.0.0"
__author__ = "Your Name"
__description__ = "BlindSignedID protocol toolkit: issuance, TESLA authenticators, receivers and DoS simulation"
