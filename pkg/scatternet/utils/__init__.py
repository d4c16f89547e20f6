# Utils package for scatternet
