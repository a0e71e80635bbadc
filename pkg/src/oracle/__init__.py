"""Black-box detector abstraction"""
