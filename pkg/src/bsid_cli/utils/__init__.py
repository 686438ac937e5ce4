"""Utility modules for BlindSignedID CLI"""
