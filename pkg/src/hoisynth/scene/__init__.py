from .objects import (
    ObjectModel,
    ObjectPlacement,
    Primitive,
    available_labels,
    load_object_template,
    object_sdf,
    sample_object_points,
)
from .scenes import (
    LIFT_LABELS,
    SIT_LABELS,
    TestScene,
    generate_test_scenes,
    labels_for_action,
    read_scenes,
    write_scenes,
)
