"""DEM sand bed, compliant gripper and the pressure-sinkage experiments that join them."""
__version__ = "0.1.0"
