# import tests so django will discover and run them

from twingym.bench.tests.throughput import *
from twingym.bench.tests.commands import *
