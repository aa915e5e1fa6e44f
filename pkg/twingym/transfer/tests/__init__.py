# import tests so django will discover and run them

from twingym.transfer.tests.policies import *
from twingym.transfer.tests.tost import *
from twingym.transfer.tests.evaluation import *
from twingym.transfer.tests.crossbackend import *
