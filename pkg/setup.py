from setuptools import setup

setup(
    name='jointparse',
    version='0.1.0',
    long_description=open('README.rst').read(),
    packages=['jointparse', 'jointparse.common', 'jointparse.common.utils', 'jointparse.tests'],
    package_data={'jointparse': ['templates/*.txt'],
                  'jointparse.tests': ['fixtures/*.conllu', 'fixtures/*.vec']},
    include_package_data=True,
    zip_safe=False,
    install_requires=[
            'Flask==2.3.3',
            'Jinja2==3.1.4',
            'MarkupSafe==2.1.5',
            'SQLAlchemy==2.0.30',
            'Werkzeug==2.3.8',
            'blinker==1.8.2',
            'click==8.1.7',
            'itsdangerous==2.2.0',
            'mock==5.1.0',
            'numpy==1.26.4',
            'pytest==8.2.2',
            'Sphinx==7.3.7',
    ],
    entry_points={
        'console_scripts': [
            'jointparse = jointparse.commands:main',
        ],
    },
)
