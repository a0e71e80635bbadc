"""
Mock detector HTTP service
"""
