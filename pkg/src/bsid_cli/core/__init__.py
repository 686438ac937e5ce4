"""BlindSignedID protocol modules"""

from .errors import BsidError

__all__ = ['BsidError']
