"""XL-MIMO wireless power transfer channel modeling and beamforming."""
