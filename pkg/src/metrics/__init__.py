"""Image quality measures"""
