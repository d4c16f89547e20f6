# Repositories package for scatternet
