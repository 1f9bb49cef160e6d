import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

from hypothesis import settings

settings.register_profile("tmotive", deadline=None, derandomize=True)
settings.load_profile("tmotive")
