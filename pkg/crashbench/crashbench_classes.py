#
# Copyright 2020 Miguel Angel Abella Gonzalez <miguel.abella@udc.es>
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#   http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Option dictionaries, enumerations and error types shared by every crashbench module."""

import json
import os
from enum import Enum, auto
from pathlib import Path


DEFAULT_SEED = 42
SEED_ENVIRONMENT_VARIABLE = 'CRASHBENCH_SEED'


def resolve_seed(seed=None) -> int:
    """Returns the explicit seed, else the CRASHBENCH_SEED environment variable, else 42."""
    if seed is not None:
        return int(seed)
    from_env = os.environ.get(SEED_ENVIRONMENT_VARIABLE)
    if from_env is not None and from_env.strip() != '':
        try:
            return int(from_env)
        except ValueError:
            raise InvalidConfigError(f'Invalid value for environment variable "{SEED_ENVIRONMENT_VARIABLE}". '
                                     f'Expected "integer"; received "{from_env}"')
    return DEFAULT_SEED


#
# Errors
#
class InvalidConfigError(ValueError):
    """A configuration value or an input parameter breaks a documented rule."""


class ScaleOutOfBoundsError(InvalidConfigError):
    """A thickness scale factor lies outside its declared bounds."""


class UnknownGroupError(InvalidConfigError):
    """A thickness edit names a group the assembly does not have."""


class NumericalBlowupError(RuntimeError):
    """Non-finite values appeared in the solver state."""

    def __init__(self, message: str, step: int = -1, time: float = float('nan')):
        super().__init__(message)
        self.step = step
        self.time = time


class SolverFinished(Exception):
    """Raised by the timestep control when no active element is left."""


class InfeasibleSpaceError(RuntimeError):
    """The sampler rejects almost every draw of a design space."""


class InfeasibleAnchorError(RuntimeError):
    """An anchor design stays infeasible after projection."""


class BundleExistsError(FileExistsError):
    """A case directory already exists and overwriting was not requested."""


class CorruptBundleError(ValueError):
    """A persisted case bundle fails validation."""

    def __init__(self, message: str, offset: int = -1):
        super().__init__(f'{message} (byte offset {offset})' if offset >= 0 else message)
        self.offset = offset


class ShapeMismatchError(ValueError):
    """Tensor shapes do not agree at a named pipeline stage."""

    def __init__(self, stage: str, message: str):
        super().__init__(f'[{stage}] {message}')
        self.stage = stage


class TrainingDivergedError(RuntimeError):
    """The training loss became non-finite."""


class PairingError(ValueError):
    """Two metric tables cannot be paired case by case."""


#
# Enumerations
#
class CampaignKind(Enum):
    """Selects the sampling protocol and the structural setup of a campaign."""
    BUMPER = auto()
    VEHICLE = auto()


class Origin(Enum):
    """Which sampler produced a design."""
    ANCHOR = auto()
    SOBOL = auto()
    LHS = auto()
    MAXIMIN = auto()


class WallKind(Enum):
    """Rigid wall geometries."""
    PLANE = auto()
    CYLINDER = auto()


class TerminationCause(Enum):
    """How a solve ended. Only NUMERICAL_BLOWUP counts as abnormal."""
    NORMAL = auto()
    ALL_ERODED = auto()
    NUMERICAL_BLOWUP = auto()


def enum_from_name(enum_class, value):
    """Accepts an enumeration member or its (case-insensitive) name."""
    if isinstance(value, enum_class):
        return value
    try:
        return enum_class[str(value).strip().upper()]
    except KeyError:
        raise InvalidConfigError(f'Invalid value for parameter "{enum_class.__name__}". '
                                 f'Expected one of "{[member.name.lower() for member in enum_class]}"; '
                                 f'received "{value}"')


#
# Option dictionaries
#
class _CustomDict(dict):
    """This class implements a Python dict in order to provide dict-like attribute access to inheriting subclasses."""

    def __init__(self):
        super(_CustomDict, self).__init__()
        self.__dict__ = self

    def __reduce__(self):
        # Rebuild through __init__ so that attribute access survives pickling into worker processes.
        return self.__class__, (), None, None, iter(self.items())


def _coerce(default, value, key: str):
    """Converts an override to the type of the option's default value."""
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        text = str(value).strip().lower()
        if text in ('1', 'true', 'yes', 'on'):
            return True
        if text in ('0', 'false', 'no', 'off'):
            return False
        raise InvalidConfigError(f'Invalid value for parameter "{key}". Expected "boolean"; received "{value}"')
    try:
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, (list, tuple)):
            if isinstance(value, str):
                value = [item for item in value.split(';') if item != '']
            return list(value)
        if default is None and isinstance(value, str):
            return None if value.strip().lower() in ('', 'none', 'null') else float(value)
    except (TypeError, ValueError):
        raise InvalidConfigError(f'Invalid value for parameter "{key}". '
                                 f'Expected "{type(default).__name__}"; received "{value}"')
    return value


class _Options(_CustomDict):
    """Common loading, overriding and validation for the UPPER_CASE option dictionaries."""

    def update_from(self, values: dict):
        """Overrides option values from a mapping. Unknown keys are rejected."""
        for key, value in values.items():
            key = str(key).strip().upper()
            if key not in self:
                raise InvalidConfigError(f'Invalid value for parameter "{key}". '
                                         f'Expected one of "{sorted(self.keys())}"; received "{key}"')
            self[key] = _coerce(self[key], value, key)
        self.validate()
        return self

    def apply_overrides(self, text: str):
        """Applies a comma separated list of KEY=VAL overrides. A bare KEY switches a boolean option on."""
        if text is None or text.strip() == '':
            return self
        values = {}
        for option in text.split(','):
            option = option.strip()
            if option == '':
                continue
            key_value = option.split('=', 1)
            if len(key_value) == 2:
                values[key_value[0]] = key_value[1]
            elif option.upper() in self and isinstance(self[option.upper()], bool):
                values[option] = True
            else:
                raise InvalidConfigError(f'Invalid value for parameter "overrides". '
                                         f'Expected "KEY=VAL"; received "{option}"')
        return self.update_from(values)

    @classmethod
    def from_json(cls, path):
        """Loads defaults, then the values stored in a UTF-8 JSON document."""
        options = cls()
        if path is None:
            return options
        with open(Path(path), encoding='utf-8') as json_file:
            values = json.load(json_file)
        if not isinstance(values, dict):
            raise InvalidConfigError(f'Invalid value for parameter "path". '
                                     f'Expected "JSON object"; received "{type(values).__name__}"')
        return options.update_from(values)

    def to_json(self, path=None) -> str:
        text = json.dumps(self.as_dict(), indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text + '\n', encoding='utf-8')
        return text

    def as_dict(self) -> dict:
        return {key: (list(value) if isinstance(value, tuple) else value) for key, value in self.items()}

    def copy(self):
        clone = self.__class__()
        for key, value in self.items():
            clone[key] = list(value) if isinstance(value, list) else value
        return clone

    def validate(self):
        """Subclasses check their invariants here."""

    def _require(self, key: str, condition: bool, rule: str):
        if not condition:
            raise InvalidConfigError(f'Invalid value for parameter "{key}". Expected "{rule}"; received "{self[key]}"')


class BumperConfig(_Options):
    """Geometry, gauges, materials and loading of the bar-element bumper assembly.

    Lengths in mm, stresses in GPa, masses in t, velocities in mm/ms."""

    def __init__(self):
        super(BumperConfig, self).__init__()

        # Beam: two chords joined by verticals and diagonals
        self.BEAM_LENGTH_MM = 1200.0        # Cross-car length
        self.BEAM_DEPTH_MM = 40.0           # Chord spacing along X
        self.BEAM_NODES = 13                # Stations per chord
        self.BEAM_SWEEP_MM = 0.0            # Forward bow of the front chord at mid-span
        self.X_BUMPER_MM = -40.0            # X of the front face in the reference configuration

        # Crash boxes: braced two-chord members behind the beam, mirrored about y = 0
        self.CRASH_BOX_LENGTH_MM = 200.0
        self.CRASH_BOX_NODES = 6            # Stations per chord, the beam station included
        self.CRASH_BOX_OFFSET_MM = 350.0    # Lateral centre line
        self.CRASH_BOX_WIDTH_MM = 100.0     # Chord spacing along Y, snapped to beam stations

        # Rails: optional continuation behind the crash boxes (0 disables them)
        self.RAIL_LENGTH_MM = 0.0
        self.RAIL_NODES = 6

        # Sections and attachments
        self.UNIT_WIDTH_MM = 10.0           # area = thickness * unit width
        self.REAR_MASS_T = 20.0             # Vehicle body share, split over the rear nodes

        # Gauges and yield parameters
        self.T_CB_MM = 2.0
        self.T_BB_MM = 2.0
        self.T_RAIL_MM = 2.0
        self.SIGMA_Y_CB_GPA = 0.35
        self.SIGMA_Y_BB_GPA = 0.675
        self.SIGMA_Y_RAIL_GPA = 0.35
        self.EPS_P_FAIL = 0.0               # 0 disables erosion

        # Elastic constants shared by both grades
        self.YOUNGS_MODULUS_GPA = 210.0
        self.POISSON_RATIO = 0.30
        self.DENSITY = 7.85e-6

        # Loading and walls
        self.VELOCITY_MM_MS = 10.0
        self.POLE_GAP_MM = 10.0
        self.FRICTION = 0.20
        self.PENALTY_STIFFNESS = None       # kN/mm; None derives it from the contacting elements

        # Numbering
        self.NUMBER_CRASH_BOXES_FIRST = False

    def validate(self):
        for key in ('BEAM_LENGTH_MM', 'BEAM_DEPTH_MM', 'CRASH_BOX_LENGTH_MM', 'CRASH_BOX_WIDTH_MM', 'UNIT_WIDTH_MM',
                    'T_CB_MM', 'T_BB_MM', 'T_RAIL_MM', 'SIGMA_Y_CB_GPA', 'SIGMA_Y_BB_GPA', 'SIGMA_Y_RAIL_GPA',
                    'YOUNGS_MODULUS_GPA', 'DENSITY'):
            self._require(key, self[key] > 0, f'{key} > 0')
        for key in ('BEAM_NODES', 'CRASH_BOX_NODES', 'RAIL_NODES'):
            self._require(key, self[key] >= 2, f'{key} >= 2')
        self._require('RAIL_LENGTH_MM', self.RAIL_LENGTH_MM >= 0, 'RAIL_LENGTH_MM >= 0')
        self._require('REAR_MASS_T', self.REAR_MASS_T >= 0, 'REAR_MASS_T >= 0')
        self._require('EPS_P_FAIL', self.EPS_P_FAIL >= 0, 'EPS_P_FAIL >= 0')
        self._require('FRICTION', self.FRICTION >= 0, 'FRICTION >= 0')
        self._require('POLE_GAP_MM', self.POLE_GAP_MM >= 0, 'POLE_GAP_MM >= 0')
        self._require('POISSON_RATIO', 0 <= self.POISSON_RATIO < 0.5, '0 <= POISSON_RATIO < 0.5')
        self._require('PENALTY_STIFFNESS', self.PENALTY_STIFFNESS is None or self.PENALTY_STIFFNESS > 0,
                      'PENALTY_STIFFNESS > 0 or None')


class SolverConfig(_Options):
    """Explicit integration controls. Times in ms."""

    def __init__(self):
        super(SolverConfig, self).__init__()

        self.TERMINATION_TIME_MS = 20.0         # T_f
        self.ANIMATION_INTERVAL_MS = 1.0        # Field frame interval
        self.HISTORY_INTERVAL_MS = 0.1          # Time-history sampling interval
        self.TIMESTEP_SCALE = 0.9               # alpha
        self.TIMESTEP_FLOOR_MS = 1e-3           # Mass scaling keeps the step at or above this value
        self.PENALTY_SCALE = 1.0                # Multiplies the automatic penalty stiffness
        self.MAX_STEPS = 2000000                # Hard stop against runaway step counts
        self.HISTORY_CHANNELS = ['fx_kN', 'fy_kN', 'fz_kN', 'e_kin_kJ', 'e_int_kJ', 'e_cont_kJ', 'e_hg_kJ',
                                 'w_p_kJ', 'a_mm_ms2']

    def validate(self):
        self._require('TIMESTEP_SCALE', 0 < self.TIMESTEP_SCALE <= 1, '0 < TIMESTEP_SCALE <= 1')
        for key in ('TERMINATION_TIME_MS', 'ANIMATION_INTERVAL_MS', 'HISTORY_INTERVAL_MS', 'TIMESTEP_FLOOR_MS',
                    'PENALTY_SCALE'):
            self._require(key, self[key] > 0, f'{key} > 0')
        self._require('MAX_STEPS', self.MAX_STEPS > 0, 'MAX_STEPS > 0')


class QoiConfig(_Options):
    """Reduced-QoI extraction settings."""

    def __init__(self):
        super(QoiConfig, self).__init__()

        self.CFC_CLASS = 60
        self.FORCE_THRESHOLD_FRACTION = 0.03    # t1/t2 threshold relative to the peak force
        self.FILTER_FORCE = True
        self.FILTER_ACCELERATION = True

    def validate(self):
        self._require('CFC_CLASS', self.CFC_CLASS > 0, 'CFC_CLASS > 0')
        self._require('FORCE_THRESHOLD_FRACTION', 0 < self.FORCE_THRESHOLD_FRACTION < 1,
                      '0 < FORCE_THRESHOLD_FRACTION < 1')


class QcThresholds(_Options):
    """Automated quality screen limits. Percentages are plain numbers (5.0 means 5 %)."""

    def __init__(self):
        super(QcThresholds, self).__init__()

        self.MAX_ENERGY_ERROR_PCT = 5.0
        self.MAX_HOURGLASS_PCT = 10.0
        self.MAX_FLOOR_STEP_FRACTION = 0.5

    def validate(self):
        for key in self.keys():
            self._require(key, self[key] >= 0, f'{key} >= 0')


class CrashSolverConfig(_Options):
    """Hyperparameters of the hierarchical mesh surrogate. Every ablation axis is a key."""

    def __init__(self):
        super(CrashSolverConfig, self).__init__()

        self.LATENT_DIM = 32
        self.ENCODER_SLICES = 8
        self.ENCODER_LAYERS = 1
        self.GLOBAL_LAYERS = 2
        self.GLOBAL_HEADS = 4
        self.PART_EMBEDDING_DIM = 8
        self.POSITIONAL_DIM = 8
        self.CONTACT_TOKENS = 4
        self.MESSAGE_PASSING_ROUNDS = 2
        self.DECODER_HIDDEN = 64
        self.FRAMES = 10
        self.COMPONENTS = 5
        self.PARTS = 8                      # Rows of the part embedding table
        self.DESIGN_DIM = 7                 # Length of the normalised design vector
        self.ACTIVATION = 'tanh'            # 'tanh' or 'identity'
        self.BYPASS_ATTENTION = False       # Skip encoder, global mixer and message passing
        self.ZERO_INIT_DECODER = True       # Zero final decoder layer: initial prediction is the undeformed mesh
        self.SEED = 0

    def validate(self):
        for key in ('LATENT_DIM', 'ENCODER_SLICES', 'ENCODER_LAYERS', 'GLOBAL_LAYERS', 'GLOBAL_HEADS',
                    'PART_EMBEDDING_DIM', 'POSITIONAL_DIM', 'CONTACT_TOKENS', 'MESSAGE_PASSING_ROUNDS',
                    'DECODER_HIDDEN', 'FRAMES', 'COMPONENTS', 'PARTS', 'DESIGN_DIM'):
            self._require(key, self[key] > 0, f'{key} > 0')
        self._require('GLOBAL_HEADS', self.LATENT_DIM % self.GLOBAL_HEADS == 0, 'GLOBAL_HEADS divides LATENT_DIM')
        self._require('POSITIONAL_DIM', self.POSITIONAL_DIM % 2 == 0, 'even POSITIONAL_DIM')
        self._require('ACTIVATION', self.ACTIVATION in ('tanh', 'identity'), "'tanh' or 'identity'")


class TrainSchedule(_Options):
    """Optimiser settings for surrogate training."""

    def __init__(self):
        super(TrainSchedule, self).__init__()

        self.EPOCHS = 50
        self.LEARNING_RATE = 1e-3
        self.BETA1 = 0.9
        self.BETA2 = 0.999
        self.EPSILON = 1e-8
        self.MAX_STEPS = -1                 # Optimiser step cap; -1 means no cap
        self.SEED = 0

    def validate(self):
        self._require('EPOCHS', self.EPOCHS >= 0, 'EPOCHS >= 0')
        self._require('LEARNING_RATE', self.LEARNING_RATE >= 0, 'LEARNING_RATE >= 0')
        self._require('BETA1', 0 <= self.BETA1 < 1, '0 <= BETA1 < 1')
        self._require('BETA2', 0 <= self.BETA2 < 1, '0 <= BETA2 < 1')
        self._require('EPSILON', self.EPSILON > 0, 'EPSILON > 0')
