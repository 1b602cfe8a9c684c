import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from veloskin.geometry import RigidTransform, quat_identity
from veloskin.rig import Bone, Skeleton, SkinnedMesh

# numpy-heavy properties blow the default 200 ms deadline on slow runners
settings.register_profile(
    "pkg", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("pkg")


def chain_skeleton(num_bones: int = 3, spacing: float = 0.5) -> Skeleton:
    """root -> bone1 -> ... stacked along +y."""
    bones = [Bone("root", -1, RigidTransform.identity())]
    for i in range(1, num_bones):
        bones.append(
            Bone(
                f"bone{i}",
                i - 1,
                RigidTransform(quat_identity(), np.array([0.0, spacing, 0.0])),
            )
        )
    return Skeleton(bones)


def single_vertex_mesh(weights, position=(0.0, 0.0, 0.0)) -> SkinnedMesh:
    return SkinnedMesh(
        rest_positions=np.array([position], dtype=float),
        triangles=np.zeros((0, 3), dtype=np.int64),
        lbs_weights=[sorted(weights.items())],
    )


@pytest.fixture
def chain3() -> Skeleton:
    return chain_skeleton(3)
