import json

from django.conf import settings
from rest_framework import serializers

from poromechanics.config import B_COEFFICIENTS, FORMULATIONS, PROBLEMS, RAMP_MODES


class JSONLiteralField(serializers.JSONField):
    """Accepts either an already-parsed value or its JSON text (as read from a config file)."""

    def to_internal_value(self, data):
        if isinstance(data, str):
            try:
                data = json.loads(data)
            except ValueError:
                self.fail('invalid')
        return super().to_internal_value(data)


class RunConfigSerializer(serializers.Serializer):
    """
    Validate a flat run configuration.

    Every key is optional and falls back to the square benchmark defaults.
    Unknown keys are rejected with an error under the offending key.
    """
    problem = serializers.ChoiceField(choices=PROBLEMS, default='roundtrip')
    formulation = serializers.ChoiceField(choices=FORMULATIONS, default='primal')
    ramp_mode = serializers.ChoiceField(choices=RAMP_MODES, default='linear')

    # Mesh
    dim = serializers.ChoiceField(choices=[2, 3], default=2)
    mesh_n = serializers.IntegerField(min_value=1, default=16)
    side = serializers.FloatField(default=0.01)
    slab_n = serializers.IntegerField(min_value=1, default=2)
    slab_lengths = JSONLiteralField(default=[0.05, 0.01, 0.01])
    quadrature_degree = serializers.IntegerField(min_value=1, max_value=20, default=6)

    # Material (Pa, m^2 s^-1 Pa^-1, kg m^-3)
    c = serializers.FloatField(default=880.0)
    b = serializers.FloatField(default=5e4)
    b_ff = serializers.FloatField(min_value=0.0, default=1.0)
    b_ss = serializers.FloatField(min_value=0.0, default=1.0)
    b_nn = serializers.FloatField(min_value=0.0, default=1.0)
    b_fs = serializers.FloatField(min_value=0.0, default=1.0)
    b_fn = serializers.FloatField(min_value=0.0, default=1.0)
    b_sn = serializers.FloatField(min_value=0.0, default=1.0)
    q1 = serializers.FloatField(default=1.333)
    q2 = serializers.FloatField(default=550.0)
    q3 = serializers.FloatField(default=10.0)
    k = serializers.FloatField(default=2e-7)
    rho_f = serializers.FloatField(default=1.0)
    sources = JSONLiteralField(default=[[1e-4, 1e4]])
    phi_bar = serializers.FloatField(default=0.1)
    p_ref = serializers.FloatField(default=0.0)
    fiber_frame = JSONLiteralField(default=None, allow_null=True)
    body_force = JSONLiteralField(default=[0.0, 0.0, 0.0])

    # Time stepping
    dt = serializers.FloatField(default=0.01)
    t_ramp = serializers.FloatField(min_value=0.0, default=0.1)
    tol = serializers.FloatField(default=1e-6)
    stationary_atol = serializers.FloatField(min_value=0.0, default=1e-15)
    max_steps = serializers.IntegerField(min_value=1, default=5000)
    ramp_levels = serializers.IntegerField(min_value=1, default=10)
    newton_abs_tol = serializers.FloatField(min_value=0.0, default=1e-12)
    newton_rel_tol = serializers.FloatField(min_value=0.0, default=1e-10)
    newton_max_iter = serializers.IntegerField(min_value=1, default=25)

    # Runs
    aa_depth = JSONLiteralField(default=[0])
    output_dir = serializers.CharField(default=lambda: settings.POROMECHANICS['OUTPUT_DIR'])
    seed = serializers.IntegerField(min_value=0, default=0)

    POSITIVE = ('side', 'c', 'b', 'q1', 'q2', 'q3', 'k', 'rho_f', 'dt')

    def to_internal_value(self, data):
        """
        Reject keys without a field before the per-field validation runs.
        """
        unknown = sorted(set(data) - set(self.fields))
        if unknown:
            raise serializers.ValidationError({key: ['Unknown configuration key.'] for key in unknown})
        return super().to_internal_value(data)

    def validate_sources(self, value):
        if not isinstance(value, list) or not all(
            isinstance(pair, list) and len(pair) == 2 and all(isinstance(v, (int, float)) for v in pair)
            for pair in value
        ):
            raise serializers.ValidationError('Expected a list of [beta, p] pairs.')
        if any(pair[0] < 0 for pair in value):
            raise serializers.ValidationError('Source coefficients beta must be non-negative.')
        return value

    def validate_aa_depth(self, value):
        if isinstance(value, int) and not isinstance(value, bool):
            value = [value]
        if not isinstance(value, list) or not value:
            raise serializers.ValidationError('Expected a non-empty list of depths.')
        if not all(isinstance(m, int) and not isinstance(m, bool) and m >= 0 for m in value):
            raise serializers.ValidationError('Depths must be non-negative integers.')
        return value

    def validate_slab_lengths(self, value):
        if not isinstance(value, list) or len(value) != 3 or not all(
            isinstance(v, (int, float)) and v > 0 for v in value
        ):
            raise serializers.ValidationError('Expected three positive lengths in meters.')
        return value

    def validate_body_force(self, value):
        if not isinstance(value, list) or len(value) not in (2, 3) or not all(
            isinstance(v, (int, float)) for v in value
        ):
            raise serializers.ValidationError('Expected a vector with 2 or 3 components.')
        return value

    def validate_fiber_frame(self, value):
        if value is None:
            return value
        if not isinstance(value, list) or len(value) != 3 or not all(
            isinstance(row, list) and len(row) == 3 for row in value
        ):
            raise serializers.ValidationError('Expected three vectors [f, s, n] of length 3.')
        return value

    def validate(self, attrs):
        errors = {}
        for name in self.POSITIVE:
            if not attrs[name] > 0:
                errors[name] = f'Must be positive, got {attrs[name]}.'
        if not 0.0 < attrs['phi_bar'] < 1.0:
            errors['phi_bar'] = f"Must lie in (0, 1), got {attrs['phi_bar']}."
        if not 0.0 < attrs['tol'] < 1.0:
            errors['tol'] = f"Must lie in (0, 1), got {attrs['tol']}."
        if attrs['fiber_frame'] is not None and attrs['dim'] == 2:
            errors['fiber_frame'] = 'A fiber frame is only supported in 3D; 2D uses the canonical basis.'
        if len(attrs['body_force']) < attrs['dim']:
            errors['body_force'] = f"Needs {attrs['dim']} components."
        if errors:
            raise serializers.ValidationError(errors)
        for name in B_COEFFICIENTS:
            attrs[name] = float(attrs[name])
        return attrs
