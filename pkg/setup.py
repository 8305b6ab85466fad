from setuptools import setup, find_packages

with open('README.md', 'r', encoding='utf-8') as f:
    long_description = f.read()

setup(
    name='gfra',
    version='0.1.0',
    license='MIT License',
    description='Link-level simulator for grant-free random access with '
    'peeling SIC and clustering ICA in massive MIMO.',
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(include=('gfra', 'gfra.*')),
    install_requires=[
        'numpy>=1.22',
        'scipy>=1.8',
        'tomli>=1.1; python_version < "3.11"',
    ],
    extras_require={
        'all': ['ujson'],
        'dev': ['pytest>=7', 'pdoc3>=0.7.5,<0.103.7'],
    },
    entry_points={
        'console_scripts': ['gfra=gfra.__main__:main'],
    },
    python_requires='>=3.8',
    platforms='any',
    classifiers=[
        'Programming Language :: Python :: 3',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Topic :: Scientific/Engineering',
    ],
)
