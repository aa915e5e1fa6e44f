# import tests so django will discover and run them

from twingym.verify.tests.suites import *
from twingym.verify.tests.rollout import *
from twingym.verify.tests.mutation import *
from twingym.verify.tests.commands import *
