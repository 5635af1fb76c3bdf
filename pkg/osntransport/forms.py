"""
Validation of command-line options and sweep plans, using Django forms.

Every command builds one of these forms from its parsed options (or, for a
sweep, from the plan's JSON object) and refuses to run unless it is valid.
Error messages name the parameter: a command-line flag such as `--gamma`,
or a JSON path such as `$.n_ladder[2]`.
"""

from typing import Any, Dict, Iterable, List, Optional

from django import forms
from django.core.exceptions import ImproperlyConfigured, ValidationError
from django.utils.deconstruct import deconstructible

from .complexity import MEASUREMENTS
from .dataset import BoundingBox
from .experiments import MIN_LADDER, MIN_REPLICATES, SweepPlan
from .model import SEED_LIMIT
from .sessions import PATTERNS


__all__ = (
    'collapse_errors',
    'DatasetForm',
    'LadderValidator',
    'NumericRange',
    'PredictForm',
    'SimulateForm',
    'SweepPlanForm',
)


@deconstructible
class NumericRange:
    """
    Number must be within the (inclusive) range given.

        >>> exponent = NumericRange(0, None)
        >>> exponent(3.5)
        >>> exponent(-1)
        Traceback (most recent call last):
        django.core.exceptions.ValidationError: ['Too small. Enter a number of at least 0.']

    """
    def __init__(self, bottom: Optional[float], top: Optional[float]):
        if bottom is not None and top is not None and bottom >= top:
            raise ImproperlyConfigured("Bottom should be less than top")
        self.bottom = bottom
        self.top = top

    def __call__(self, number: float) -> None:
        try:
            if self.bottom is not None and number < self.bottom:
                if self.top is None:
                    raise ValidationError(f"Too small. Enter a number of at least {self.bottom}.")
                raise ValidationError(f"Too small. Enter a number from {self.bottom} to {self.top}.")
            if self.top is not None and number > self.top:
                raise ValidationError(f"Too large. Enter a number of at most {self.top}.")
        except TypeError:
            raise ValidationError('Enter a valid number.')

    def __eq__(self, other: Any) -> bool:
        return bool(
            (self.bottom == other.bottom)
            and (self.top == other.top)
        )


@deconstructible
class LadderValidator:
    """
    Ensure value is a strictly increasing list of network sizes.

        >>> validator = LadderValidator(4)
        >>> validator([64, 128, 256, 512])
        >>> validator([64, 128, 128, 512])
        Traceback (most recent call last):
        django.core.exceptions.ValidationError: ['[2]: must be greater than 128, found 128']

    """
    def __init__(self, min_length: int):
        self.min_length = min_length

    def __call__(self, container: Any) -> None:
        if not isinstance(container, list):
            raise ValidationError(
                f"Must be a list, found: {type(container).__name__!r}"
            )
        if len(container) < self.min_length:
            raise ValidationError(
                f"Needs at least {self.min_length} sizes, found {len(container)}"
            )
        for index, value in enumerate(container):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValidationError(
                    f"[{index}]: must be an integer, found {type(value).__name__!r}"
                )
            if value < 2:
                raise ValidationError(f"[{index}]: must be at least 2, found {value}")
            if index and value <= container[index - 1]:
                raise ValidationError(
                    f"[{index}]: must be greater than {container[index - 1]}, found {value}"
                )

    def __eq__(self, other: Any) -> bool:
        return self.min_length == other.min_length


class LadderField(forms.Field):
    """
    Accepts a Python list as-is, for forms bound to decoded JSON.
    """
    def __init__(self, **kwargs: Any):
        super().__init__(validators=[LadderValidator(MIN_LADDER)], **kwargs)


def exponent_field(required: bool = True, **kwargs: Any) -> forms.FloatField:
    return forms.FloatField(required=required, validators=[NumericRange(0, None)], **kwargs)


def seed_field() -> forms.IntegerField:
    return forms.IntegerField(min_value=0, max_value=SEED_LIMIT - 1, initial=0, required=False)


def collapse_errors(errors: Dict[str, List[str]], template: str = "--{}") -> List[str]:
    """
    Collapse a dictionary of form errors into a flat list, naming each field.

        >>> collapse_errors({'gamma': ['Ensure this value is greater than or equal to 0.']})
        ['--gamma: Ensure this value is greater than or equal to 0']
        >>> collapse_errors({'n_ladder': ['[2]: must be an integer']}, template="$.{}")
        ['$.n_ladder[2]: must be an integer']

    Args:
        errors:
            A dictionary of Django form errors from, eg. 'form.errors'
        template:
            How to name a field, eg. '--{}' for flags or '$.{}' for JSON.

    Returns:
        A sorted list of error strings.
    """
    output = []
    for field, messages in errors.items():
        for message in messages:
            message = message.strip().rstrip('.')
            if field == '__all__':
                output.append(message)
            elif message.startswith('['):
                suffix, _, rest = message.partition(': ')
                output.append(f"{template.format(field)}{suffix}: {rest}")
            else:
                name = template.format(field.replace('_', '-') if template.startswith('--') else field)
                output.append(f"{name}: {message}")
    return sorted(output)


class PatternMixin:
    """
    Multicast needs φ, broadcast ignores it.
    """
    def clean(self) -> Dict[str, Any]:
        cleaned_data = super().clean()                      # type: ignore[misc]
        if cleaned_data.get('pattern') == 'multicast' and cleaned_data.get('phi') is None:
            self.add_error('phi', "Required for multicast")  # type: ignore[attr-defined]
        return cleaned_data


class SimulateForm(PatternMixin, forms.Form):
    n = forms.IntegerField(min_value=2)
    gamma = exponent_field()
    beta = exponent_field()
    phi = exponent_field(required=False)
    pattern = forms.ChoiceField(choices=[(p, p) for p in PATTERNS])
    seed = seed_field()

    def clean_seed(self) -> int:
        return self.cleaned_data['seed'] or 0


class PredictForm(PatternMixin, forms.Form):
    gamma = exponent_field()
    beta = exponent_field()
    phi = exponent_field(required=False)
    pattern = forms.ChoiceField(choices=[(p, p) for p in PATTERNS])
    measurement = forms.ChoiceField(choices=[(m, m) for m in MEASUREMENTS])


class SweepPlanForm(PatternMixin, forms.Form):
    """
    A sweep plan, bound to the decoded JSON object.

    Unknown keys are errors, so typos do not silently fall back to defaults.
    """
    n_ladder = LadderField()
    gamma = exponent_field()
    beta = exponent_field()
    phi = exponent_field(required=False)
    pattern = forms.ChoiceField(choices=[(p, p) for p in PATTERNS], required=False)
    replicates = forms.IntegerField(min_value=MIN_REPLICATES, initial=MIN_REPLICATES, required=False)
    measurement = forms.ChoiceField(choices=[(m, m) for m in MEASUREMENTS], required=False)
    base_seed = seed_field()
    fit_log_term = forms.BooleanField(required=False)
    tolerance = forms.FloatField(min_value=0.0, required=False)
    confidence = forms.FloatField(min_value=0.5, max_value=0.999, required=False)

    def __init__(self, data: Any, *args: Any, **kwargs: Any):
        self.unknown: Iterable[str] = ()
        if not isinstance(data, dict):
            self.not_object = type(data).__name__
            data = {}
        else:
            self.not_object = None
            self.unknown = sorted(set(data) - set(self.base_fields))
        super().__init__(data, *args, **kwargs)

    def clean(self) -> Dict[str, Any]:
        if self.not_object is not None:
            raise ValidationError(f"Plan must be a JSON object, found: {self.not_object!r}")
        for key in self.unknown:
            self.add_error(None, f"$.{key}: unknown key")
        return super().clean()

    def plan(self) -> SweepPlan:
        data = self.cleaned_data
        return SweepPlan(
            n_ladder=tuple(data['n_ladder']),
            gamma=data['gamma'],
            beta=data['beta'],
            pattern=data['pattern'] or 'broadcast',
            phi=data['phi'],
            replicates=data['replicates'] or MIN_REPLICATES,
            measurement=data['measurement'] or 'total-load',
            base_seed=data['base_seed'] or 0,
            fit_log_term=data['fit_log_term'],
            tolerance=data['tolerance'],
            confidence=data['confidence'] or 0.95,
        )


class DatasetForm(forms.Form):
    subsample_users = forms.IntegerField(min_value=1, required=False)
    positions = forms.IntegerField(min_value=1)
    distance_km = forms.FloatField(min_value=0.0)
    seed = seed_field()
    per_decade = forms.IntegerField(min_value=1, max_value=100)
    lat_min = forms.FloatField(min_value=-90, max_value=90)
    lat_max = forms.FloatField(min_value=-90, max_value=90)
    lon_min = forms.FloatField(min_value=-180, max_value=180)
    lon_max = forms.FloatField(min_value=-180, max_value=180)

    def clean(self) -> Dict[str, Any]:
        cleaned_data = super().clean()
        keys = ('lat_min', 'lat_max', 'lon_min', 'lon_max')
        if all(cleaned_data.get(key) is not None for key in keys):
            box = BoundingBox(*(cleaned_data[key] for key in keys))
            if box.lat_min >= box.lat_max or box.lon_min >= box.lon_max:
                raise ValidationError(f"Empty bounding box: {tuple(box)!r}")
            cleaned_data['box'] = box
        return cleaned_data

