"""Contract tests"""
