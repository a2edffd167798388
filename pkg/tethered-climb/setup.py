import setuptools
import tethered_climb

setuptools.setup(
    name="tethered-climb",
    version=tethered_climb.__version__,
    description="Simulations of tethered hopping robots climbing steep planetary cliffs",
    packages=(
        'tethered_climb',
        'tethered_climb.data'),
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires='>=3.8',
    install_requires = [
        'numpy', 'pandas', 'scipy', 'matplotlib',
        'seaborn', 'pyyaml', 'tqdm'
    ],
    entry_points={
        'console_scripts': ['tethered-climb=tethered_climb.cli:main'],
    }
)
