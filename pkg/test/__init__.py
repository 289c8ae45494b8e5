"""Test suite for the fspec package."""
