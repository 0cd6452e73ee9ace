# Test package for holomart
