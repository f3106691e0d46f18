"""Sound-law rewrite engine and programming-by-examples harness."""

from .phonology import (  # noqa: F401
    SegmentInventory,
    default_inventory,
    load_feature_table,
    load_lexicon,
    preprocess,
    render,
)
from .rules import (  # noqa: F401
    Cascade,
    SoundLaw,
    apply_cascade,
    apply_law,
    apply_law_word,
    apply_to_lexicon,
    find_matches,
    law_is_inert,
)
from .dsl import (  # noqa: F401
    lower_classical,
    parse_classical,
    parse_program_text,
    print_law,
    read_law,
)
from .tasks import PBETask, read_tasks, write_tasks  # noqa: F401

__version__ = "0.1.0"
