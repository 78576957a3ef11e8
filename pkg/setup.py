from setuptools import setup
import os

version = "0.3.0"
tag = os.getenv("TRAVIS_TAG")
assert not tag or tag==version, "Travis tag has to match version: %r!=%r" % (tag, version)

setup(
    name="pymcmw",
    version=version,

    author="pymcmw developers",
    license="MIT",
    description="McDonald modified Weibull lifetime distribution: evaluation, moments, MLE fitting and model comparison",
    keywords=['RELIABILITY', 'LIFETIME', 'WEIBULL', 'MAXIMUM LIKELIHOOD'],

    packages=["pymcmw"],
    install_requires=["numpy>=1.17", "scipy>=1.4"],
    entry_points={
        "console_scripts": ["mcmw = pymcmw.cli:main"],
    },
    test_suite="tests",
)
