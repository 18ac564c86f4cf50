"""Test suite for koopman-distill"""
