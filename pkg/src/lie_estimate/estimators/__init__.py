"""Concrete state estimators for floating-base legged systems."""

from .noise import NoiseConfig, load_noise_config
from .diligent import (DiligentState, diligent_initial_state,
                       diligent_predict, diligent_update,
                       diligent_rie_predict, diligent_rie_update,
                       foot_pose_measurement)
from .codiligent import codiligent_predict
from .landmarks import augment_landmark, marginalize_landmark, landmark_pose
from .human_ekf import (HumanEkfState, human_initial_state, human_ekf_predict,
                        human_update_relative_contact_position,
                        human_update_zupt_linear, human_update_zupt_angular,
                        human_update_terrain_height, human_update_base_gyro,
                        human_update_relative_foot_rotation,
                        human_update_contact_plane)
from .swa import SwaState, swa_start, swa_step

__all__ = [n for n in dir() if not n.startswith("_")]
