#!/usr/bin/env python

"""The setup script."""

from setuptools import setup, find_packages

with open('README.rst') as readme_file:
    readme = readme_file.read()

with open('docs/history.rst') as history_file:
    history = history_file.read()

with open('requirements.txt') as req:
    requirements = [r for r in req.read().split('\n') if r.strip()]

with open('requirements_dev.txt') as req:
    # Ignore the -r on the two lines
    test_requirements = [r for r in req.read().split('\n')[2:] if r.strip()]

setup(
    author="Micah Johnson",
    python_requires='>=3.8',
    classifiers=[
        'Development Status :: 2 - Pre-Alpha',
        'Intended Audience :: Science/Research',
        'Natural Language :: English',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
    description="Fast reaction limit solver for two species reaction-diffusion "
                "fronts, with the self-similar limit profile and convergence checks",
    entry_points={
        'console_scripts': [
            'fastreact=fastreact.cli:main',
        ],
    },
    install_requires=requirements,
    long_description=readme + '\n\n' + history,
    include_package_data=True,
    keywords='fastreact',
    name='fastreact',
    packages=find_packages(include=['fastreact', 'fastreact.*']),
    test_suite='tests',
    tests_require=test_requirements,
    version='0.1.0',
    zip_safe=False,
)
