# Tests package for scatternet
