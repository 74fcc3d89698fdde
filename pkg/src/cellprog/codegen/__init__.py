from .check import Diagnostic, check_program, count_motions, read_declarations
from .inform import emit_inform
from .ir import Instruction, PoseDecl, ProgramIR, lower
from .rapid import emit_rapid, speed_term

__all__ = [
    "Diagnostic", "Instruction", "PoseDecl", "ProgramIR",
    "check_program", "count_motions", "emit_inform", "emit_rapid",
    "lower", "read_declarations", "speed_term",
]
