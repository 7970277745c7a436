import logging

from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from backend.oracle import MODE_CHOICES, BackendConfig
from backend.server import PoseServer
from netlink.sockets import parse_address

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Run the oracle pose-estimation backend as a TCP server'

    def add_arguments(self, parser):
        defaults = settings.VIOTRACK
        parser.add_argument('--addr', default=defaults['ADDR'], help='HOST:PORT to listen on')
        parser.add_argument('--backend', choices=[mode for mode, _ in MODE_CHOICES], default='gt')
        parser.add_argument('--seed', type=int, default=defaults['SEED'])
        parser.add_argument(
            '--compute-delay', type=float, default=0.0,
            help='Seconds to wait before answering each request',
        )
        parser.add_argument('--trans-sigma', type=float, default=defaults['TRANS_NOISE_SIGMA'])
        parser.add_argument('--rot-sigma', type=float, default=defaults['ROT_NOISE_SIGMA'])

    def handle(self, *args, **options):
        try:
            address = parse_address(options['addr'])
            config = BackendConfig(
                mode=options['backend'],
                trans_noise_sigma=options['trans_sigma'],
                rot_noise_sigma=options['rot_sigma'],
                rng_seed=options['seed'],
                compute_delay=options['compute_delay'],
            )
        except (ValueError, ValidationError) as exc:
            raise CommandError(exc)

        try:
            server = PoseServer(address, config)
        except OSError as exc:
            raise CommandError(f'Cannot listen on {options["addr"]}: {exc}')

        host, port = server.server_address[:2]
        self.stdout.write(self.style.SUCCESS(f'Serving {config.mode} poses on {host}:{port}'))
        logger.info('Backend server started on %s:%s', host, port)
        with server:
            try:
                server.serve_forever()
            except KeyboardInterrupt:
                self.stdout.write('Shutting down...')
        logger.info('Backend server stopped')
