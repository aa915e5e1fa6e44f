# import tests so django will discover and run them

from twingym.envs.tests.pong import *
from twingym.envs.tests.cartpole import *
from twingym.envs.tests.registry import *
