from src.services.datagen.bakery import COVARIATE_NAMES, BakeryFixture, generate_bakery_fixture
from src.services.datagen.frames import dataset_to_frame, frame_to_dataset
from src.services.datagen.synthetic import (
    generate_quantile_tasks,
    generate_related_coefficients,
    normal_quantile,
)

__all__ = [
    "COVARIATE_NAMES",
    "BakeryFixture",
    "generate_bakery_fixture",
    "dataset_to_frame",
    "frame_to_dataset",
    "generate_quantile_tasks",
    "generate_related_coefficients",
    "normal_quantile",
]
