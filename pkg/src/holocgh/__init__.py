"""Binary-amplitude holography: optimization, viewing simulation and analysis."""

from .optics import OpticalConfig, diffraction_angle, display_geometry, plane_depths

__version__ = "0.1.0"

__all__ = ["OpticalConfig", "diffraction_angle", "display_geometry", "plane_depths", "__version__"]
