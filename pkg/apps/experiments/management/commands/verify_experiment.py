from apps.experiments.management.commands.run_experiment import Command as RunExperimentCommand


class Command(RunExperimentCommand):
    help = 'Run a config with every invariant suite; exits 1 when any invariant fails'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='path to the experiment config (JSON)')
        parser.add_argument('--seeds', type=int, help='number of seeds (overrides the config)')
        parser.add_argument('--out', help='output directory (default: DOCO_OUTPUT_DIR/<name>/<config hash>)')

    def handle(self, *args, **options):
        return super().handle(*args, **{**options, 'verify': True, 'sweep': None})
