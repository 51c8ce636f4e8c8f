"""Test suite for the CACTUS classifier."""
