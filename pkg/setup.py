#!/usr/bin/env python

from distutils.core import setup
from setuptools import find_packages

setup(
    name='abelvol',
    version='0.1',
    description='Abelianization of rank-2 Fuchsian systems on the four-punctured sphere and the volume of their moduli space',
    packages=find_packages(include=['abelvol*', 'pavlov*', 'rebar*']),
    python_requires='>=3.7',
    install_requires=[
        'numpy>=1.20',
        'scipy>=1.6',
        'pandas>=1.2',
        'portalocker>=2.2',
        'pytest>=6.2',
        'aljpy==0.7',
        'matplotlib>=3.3',
        'loky>=1.6',
        'tqdm>=4.50'],
    extras_require={},
    entry_points={
        'console_scripts': ['abelvol=abelvol.cli:main']})
