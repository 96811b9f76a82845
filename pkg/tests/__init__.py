"""Tests for ensembench."""
