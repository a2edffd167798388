# first is major release
# second is feature release
# third is hotfix
__version__ = '0.1.0'
