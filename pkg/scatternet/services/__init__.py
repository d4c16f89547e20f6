# Services package for scatternet
