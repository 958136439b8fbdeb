# Test package for the subshift tiling compiler.
