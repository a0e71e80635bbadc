"""Subject region acquisition and sampling"""
