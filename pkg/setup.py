from setuptools import find_packages, setup
try:
    from pip._internal.req import parse_requirements
except ImportError:
    from pip.req import parse_requirements


def load_requirements(fname):
    reqs = parse_requirements(fname, session="test")
    try:
        return [str(ir.req) for ir in reqs]
    except AttributeError:
        return [str(ir.requirement) for ir in reqs]

setup(
    name='incnet',
    version='0.1.0',
    author='incnet developers',
    packages=find_packages(exclude=['examples', 'docs', 'tests', 'tools',
                                    'setup.py']),
    package_data={'incnet': ['data/*.nf', 'data/*.schema', 'data/*.json']},
    license='Lesser GPL v2.1',
    description='Simulated in-network computation RPC stack with a '
                'programmable switch, host agents and experiment harness',
    python_requires=">=3.6.0",
    install_requires=load_requirements("requirements.txt"),
    long_description=open('README.rst').read(),
    entry_points={'console_scripts': ['incnet=incnet.harness.cli:main']},
)
