# pylint: disable=wildcard-import
from fedcy.data import *
from fedcy.dataset_readers import *
from fedcy.models import *
from fedcy.predictors import *
