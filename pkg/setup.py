from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

with open("requirements.txt") as f:
    requirements = f.read().splitlines()

setup(
    name="cluster_consensus",
    version="0.0.1",
    author="Adam Fradgley",
    description="Stubbornness gain design and simulation for k-partite consensus on signed clustered graphs",
    long_description=long_description,
    long_description_content_type="text/markdown",
    license="None",
    packages=find_packages(exclude=["tests"]),
    package_data={"cluster_consensus": ["resources/configs/*.json", "resources/graphs/*.json"]},
    install_requires=requirements,
    entry_points={"console_scripts": ["cluster-consensus=cluster_consensus.cli:run"]},
)
