from rest_framework import serializers

from apps.adversary.scenarios import SCENARIO_TAGS
from apps.encoding.specs import ENCODER_KINDS
from apps.graphs.balls import ALL, DYADIC
from apps.graphs.topology import INDUCED, SUBGRAPH_METRICS
from apps.learners.stack import COMPARATOR_ADAPTIVE, OGD, STACK_KINDS
from apps.metrics.bounds import BOUND_KEYS
from apps.partition.collection import CLUSTERS, COLLECTION_MODES, EXPLICIT, SINGLE

GRAPH_KINDS = ('edges', 'path', 'star', 'two_cluster', 'embedded_clusters')

DEFAULT_COMPARATOR_NORMS = (0.0, 0.1, 1.0, 10.0, 100.0)


class GraphSerializer(serializers.Serializer):
    REQUIRED = {
        'edges': ('edges',),
        'path': ('num_nodes',),
        'star': ('leaves',),
        'two_cluster': ('cluster_leaves', 'connector_length'),
        'embedded_clusters': (),
    }

    kind = serializers.ChoiceField(choices=GRAPH_KINDS)
    edges = serializers.JSONField(required=False)
    num_nodes = serializers.IntegerField(required=False, min_value=1)
    leaves = serializers.IntegerField(required=False, min_value=1)
    cluster_leaves = serializers.IntegerField(required=False, min_value=1)
    connector_length = serializers.IntegerField(required=False, min_value=1)
    spokes = serializers.IntegerField(required=False, min_value=6)
    layers = serializers.IntegerField(required=False, min_value=1)

    def validate(self, attrs):
        missing = [name for name in self.REQUIRED[attrs['kind']] if name not in attrs]
        if missing:
            raise serializers.ValidationError(
                {name: f'required for {attrs["kind"]} graphs' for name in missing}
            )
        edges = attrs.get('edges')
        if edges is not None and not isinstance(edges, (str, list)):
            raise serializers.ValidationError({'edges': 'give an edge-list text block or a list of pairs'})
        return attrs


class ScenarioSerializer(serializers.Serializer):
    tag = serializers.ChoiceField(choices=SCENARIO_TAGS, default='random')
    bias = serializers.FloatField(required=False, min_value=0.0, max_value=1.0)
    block = serializers.IntegerField(required=False, min_value=1)
    directions = serializers.ListField(child=serializers.ListField(child=serializers.FloatField()), required=False)
    direction = serializers.ListField(child=serializers.FloatField(), required=False)
    node = serializers.IntegerField(required=False, min_value=0)
    variant = serializers.ChoiceField(choices=('g', 'h'), required=False)
    search = serializers.ChoiceField(choices=('grid', 'sampled'), required=False)
    samples = serializers.IntegerField(required=False, min_value=2)


class EncoderSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=ENCODER_KINDS)
    precision = serializers.IntegerField(required=False, min_value=0)


class LearnerSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=STACK_KINDS, default=COMPARATOR_ADAPTIVE)
    nu_total = serializers.FloatField(default=1.0)
    eps = serializers.FloatField(required=False, min_value=0.0)
    grad_bound = serializers.FloatField(required=False)
    c = serializers.FloatField(default=1.0)
    a_multiplier = serializers.FloatField(default=1.0)
    learning_rate = serializers.FloatField(required=False)

    def validate_nu_total(self, value):
        if not value > 0:
            raise serializers.ValidationError('nu_total must be positive')
        return value

    def validate_grad_bound(self, value):
        if not value > 0:
            raise serializers.ValidationError('the gradient bound override must be positive')
        return value

    def validate(self, attrs):
        if attrs['kind'] == OGD and not attrs.get('learning_rate', 0) > 0:
            raise serializers.ValidationError({'learning_rate': 'the ogd learner needs a positive learning_rate'})
        if not attrs['c'] > 0:
            raise serializers.ValidationError({'c': 'step constant c must be positive'})
        if not attrs['a_multiplier'] > 0:
            raise serializers.ValidationError({'a_multiplier': 'a_multiplier must be positive'})
        return attrs


class CollectionSerializer(serializers.Serializer):
    mode = serializers.ChoiceField(choices=COLLECTION_MODES, default=SINGLE)
    include_full = serializers.BooleanField(required=False)
    sets = serializers.ListField(child=serializers.ListField(child=serializers.IntegerField(min_value=0)),
                                 required=False)
    labels = serializers.ListField(child=serializers.CharField(), required=False)
    radii_mode = serializers.ChoiceField(choices=(ALL, DYADIC), required=False)
    metric = serializers.ChoiceField(choices=SUBGRAPH_METRICS, default=INDUCED)
    deduplicate = serializers.BooleanField(required=False)
    cells = serializers.ListField(child=serializers.CharField(), required=False)

    def validate(self, attrs):
        if attrs['mode'] == EXPLICIT and not attrs.get('sets'):
            raise serializers.ValidationError({'sets': 'explicit collections need node sets'})
        if attrs['mode'] != EXPLICIT and 'sets' in attrs:
            raise serializers.ValidationError({'sets': f'only explicit collections take sets, not {attrs["mode"]}'})
        return attrs


class ComparatorSerializer(serializers.Serializer):
    name = serializers.CharField(required=False)
    vector = serializers.ListField(child=serializers.FloatField(), required=False)
    norm = serializers.FloatField(required=False, min_value=0.0)
    direction = serializers.ListField(child=serializers.FloatField(), required=False)

    def validate(self, attrs):
        if 'vector' in attrs and ('norm' in attrs or 'direction' in attrs):
            raise serializers.ValidationError('give either a vector or a norm and direction')
        if 'vector' not in attrs and 'norm' not in attrs:
            raise serializers.ValidationError('a comparator needs a vector or a norm')
        return attrs


class VerifySerializer(serializers.Serializer):
    scalar_traces = serializers.IntegerField(default=100, min_value=0)
    scalar_rounds = serializers.IntegerField(default=1000, min_value=0)
    closed_form_states = serializers.IntegerField(default=200, min_value=0)
    prod_tuples = serializers.IntegerField(default=10000, min_value=0)
    tolerance = serializers.FloatField(default=1e-9, min_value=0.0)


class ExperimentConfigSerializer(serializers.Serializer):
    name = serializers.CharField(default='experiment')
    T = serializers.IntegerField(min_value=0)
    dim = serializers.IntegerField(min_value=1)
    grad_bound = serializers.FloatField(default=1.0)
    bit_budget = serializers.IntegerField(min_value=1)
    seeds = serializers.IntegerField(default=1, min_value=1)
    master_seed = serializers.IntegerField(default=0, min_value=0)
    graph = GraphSerializer()
    scenario = ScenarioSerializer()
    encoder = EncoderSerializer()
    learner = LearnerSerializer()
    collection = CollectionSerializer()
    comparators = ComparatorSerializer(many=True, required=False)
    bounds = serializers.ListField(child=serializers.ChoiceField(choices=BOUND_KEYS), required=False)
    verify = VerifySerializer()

    OPTIONAL_SECTIONS = ('scenario', 'learner', 'collection', 'verify')

    def to_internal_value(self, data):
        # absent sections still go through validation so their defaults apply
        if isinstance(data, dict):
            data = {**{section: {} for section in self.OPTIONAL_SECTIONS}, **data}
        return super().to_internal_value(data)

    def validate_grad_bound(self, value):
        if not value > 0:
            raise serializers.ValidationError('gradient bound G must be positive')
        return value

    def validate(self, attrs):
        if 'comparators' not in attrs:
            attrs['comparators'] = [{'name': f'u{i}', 'norm': norm} for i, norm in enumerate(DEFAULT_COMPARATOR_NORMS)]
        for i, comparator in enumerate(attrs['comparators']):
            comparator.setdefault('name', f'u{i}')
            size = len(comparator.get('vector') or comparator.get('direction') or [0.0] * attrs['dim'])
            if size != attrs['dim']:
                raise serializers.ValidationError({'comparators': f'comparator {i} has {size} coordinates, '
                                                                  f'expected dim={attrs["dim"]}'})
        names = [c['name'] for c in attrs['comparators']]
        if len(set(names)) != len(names):
            raise serializers.ValidationError({'comparators': 'comparator names must be unique'})
        if attrs['collection']['mode'] == CLUSTERS and attrs['graph']['kind'] not in ('two_cluster', 'embedded_clusters'):
            raise serializers.ValidationError({'collection': 'clusters mode needs a two_cluster or embedded_clusters graph'})
        if attrs['scenario']['tag'] == 'encoding_attack' and attrs['encoder']['kind'] != 'deterministic_grid':
            raise serializers.ValidationError({'scenario': 'encoding_attack targets the deterministic_grid encoder'})
        return attrs
