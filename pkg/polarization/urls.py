from django.urls import path
from .views import (
    RunListView,
    RunRetrieveDeleteView,
    RwcView,
)

app_name = 'polarization'

urlpatterns = [
    # GET: List recorded runs with optional filtering
    path('runs/', RunListView.as_view(), name='runs'),

    # GET: Retrieve a recorded run
    # DELETE: Delete a recorded run
    path('runs/<str:run_id>/', RunRetrieveDeleteView.as_view(), name='run-detail'),

    # POST: Measure RWC of a synthetic graph
    path('rwc/', RwcView.as_view(), name='rwc'),
]
