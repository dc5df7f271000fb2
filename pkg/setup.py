#!/usr/bin/env python
"""voxfield distutils configuration."""
import sys
import os
import codecs

from setuptools import setup, find_packages


with open('README.md', encoding='utf-8') as readme_file:
    readme = readme_file.read()

DEV_REQUIREMENTS = [
    'pytest',
    'pytest-cov',
    'pytest-mock',
]


def _read(rel_path):
    here = os.path.abspath(os.path.dirname(__file__))
    with codecs.open(os.path.join(here, rel_path), 'r') as fp:
        return fp.read()


def get_version(rel_path):
    """Get the version from the __version__ file in the voxfield dir."""
    for line in _read(rel_path).splitlines():
        if line.startswith('__version__'):
            delim = '"' if '"' in line else "'"
            return line.split(delim)[1]
    else:
        raise RuntimeError("Unable to find version string.")


INSTALL_REQUIREMENTS = [
    'click>=7.0',
    'PyYAML>=5.3',
    'rich>=3.3.0',
    'pydantic>=2.0',
    'pydantic-settings>=2.0',
    'typing-extensions>=4.0',
    'numpy>=1.20',
    'scipy>=1.6',
]

if sys.argv[-1] == 'readme':
    print(readme)
    sys.exit()

setup(
    name='voxfield',
    version=get_version(os.path.join('voxfield', '__init__.py')),
    description=(
        'Voxel-level surface-sample tokens for street scenes: meshing, a '
        'set-transformer diffusion model, spatial outpainting and splat rendering.'
    ),
    long_description=readme,
    long_description_content_type='text/markdown',
    packages=find_packages(exclude=['tests*', 'docs*', '.github*']),
    package_dir={'voxfield': 'voxfield'},
    entry_points={'console_scripts': ['voxfield = voxfield.__main__:main']},
    extras_require={'dev': DEV_REQUIREMENTS},
    include_package_data=True,
    python_requires='>=3.8',
    install_requires=INSTALL_REQUIREMENTS,
    license='BSD',
    zip_safe=False,
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "Natural Language :: English",
        "License :: OSI Approved :: BSD License",
        "Programming Language :: Python :: 3 :: Only",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: Implementation :: CPython",
        "Topic :: Scientific/Engineering",
    ],
    keywords=[
        "voxel",
        "diffusion",
        "point cloud",
        "outpainting",
        "gaussian splatting",
        "street scenes",
    ],
)
