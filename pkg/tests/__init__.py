"""Test suite for the tcn_bench package."""
