"""Test suite for fedsaddle."""
